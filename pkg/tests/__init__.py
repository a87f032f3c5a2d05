# tests パッケージを有効にするだけの空ファイル
