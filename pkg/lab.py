import argparse
import asyncio
import importlib
import os
import sys
from typing import Callable, Dict, List, Optional

from dotenv import load_dotenv

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from cogs.errors import LabError
from cogs.logger import log_command

load_dotenv()


class LabCli:
    """子命令注册表，每个 cog 在 setup(cli) 中登记自己的子命令"""

    def __init__(self):
        self.parser = argparse.ArgumentParser(
            prog="lab",
            description="一维 MHD 模型第一激发态附近的谱方法模拟与谱分析工具",
        )
        self.subparsers = self.parser.add_subparsers(dest="command", metavar="<子命令>")
        self.handlers: Dict[str, Callable] = {}

    def add_command(self, name: str, help_text: str, configure: Callable, handle: Callable):
        if name in self.handlers:
            raise ValueError(f"子命令 {name} 重复注册")
        sub = self.subparsers.add_parser(name, help=help_text, description=help_text)
        configure(sub)
        self.handlers[name] = handle

    def run(self, argv: Optional[List[str]] = None) -> int:
        args = self.parser.parse_args(argv)
        if not args.command:
            self.parser.print_help()
            return 2
        handler = self.handlers[args.command]
        try:
            code = handler(args)
            log_command(args.command, True)
            return code
        except LabError as e:
            log_command(args.command, False)
            print(f"❌ [错误] {e}")
            return e.exit_code
        except KeyboardInterrupt:
            log_command(args.command, False)
            print("\n⚠️ 用户中断操作")
            return 130


async def load_cogs(cli: LabCli):
    """加载 cogs 文件夹下的所有扩展"""
    cogs_dir = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'cogs')
    if not os.path.exists(cogs_dir):
        print(f"⚠️ [警告] 未找到 '{cogs_dir}' 文件夹，跳过加载 cogs。")
        return

    for filename in sorted(os.listdir(cogs_dir)):
        # 确保是 Python 文件且不是 __init__.py
        if filename.endswith('.py') and filename != '__init__.py':
            try:
                module = importlib.import_module(f'cogs.{filename[:-3]}')
                setup = getattr(module, 'setup', None)
                if setup is not None:
                    await setup(cli)
                    print(f'✅ 已成功加载 cog: {filename}')
            except Exception as e:
                print(f'❌ 加载 cog {filename} 时发生错误: {e}')


def build_cli() -> LabCli:
    cli = LabCli()
    asyncio.run(load_cogs(cli))
    return cli


def main(argv: Optional[List[str]] = None) -> int:
    """命令行入口"""
    return build_cli().run(argv)


if __name__ == '__main__':
    sys.exit(main())
