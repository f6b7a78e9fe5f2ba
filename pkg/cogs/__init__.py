# cogs/__init__.py
# 这个文件让 Python 将 cogs 目录视为一个包，lab.py 会加载其中每个模块的 setup(cli)。
