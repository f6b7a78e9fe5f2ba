import logging
import os
from datetime import datetime

from dotenv import load_dotenv

load_dotenv()

LOG_DIR = os.getenv("LOG_DIR", "logs")


def log_command(command_name: str, success: bool):
    """记录子命令的使用情况"""
    log_file = os.path.join(LOG_DIR, 'log.txt')

    # 确保logs文件夹存在
    if not os.path.exists(LOG_DIR):
        try:
            os.makedirs(LOG_DIR)
        except OSError as e:
            print(f"❌ [错误] 创建日志文件夹 {LOG_DIR} 失败: {e}")
            return

    try:
        status = "成功" if success else "失败"
        timestamp = datetime.now().strftime('%Y-%m-%d %H:%M:%S')
        log_entry = f"[{timestamp}] ({command_name}+{status})\n"

        with open(log_file, 'a', encoding='utf-8') as f:
            f.write(log_entry)
    except Exception as e:
        print(f"❌ [错误] 写入日志文件失败: {e}")


def get_file_logger(name: str, filename: str) -> logging.Logger:
    """
    获取写入 LOG_DIR 下指定文件的命名日志器

    Args:
        name: 日志器名称
        filename: 日志文件名

    Returns:
        已配置的日志器，同名日志器只会添加一次处理器
    """
    logger = logging.getLogger(name)
    logger.setLevel(logging.INFO)

    # 如果还没有处理器，添加一个
    if not logger.handlers:
        try:
            os.makedirs(LOG_DIR, exist_ok=True)
            handler = logging.FileHandler(os.path.join(LOG_DIR, filename), encoding='utf-8')
        except OSError:
            # 日志目录不可写时退回到标准错误输出
            handler = logging.StreamHandler()
        formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')
        handler.setFormatter(formatter)
        logger.addHandler(handler)

    return logger
