# lambda_http/main.py

from mangum import Mangum

from backend.fastapi_app.main import app

# API Gateway の prod ステージにデプロイするので base path は "/prod"
handler = Mangum(app, api_gateway_base_path="/prod")
