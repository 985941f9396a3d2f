#!/usr/bin/env python
"""Командная строка crowdmap: python manage.py <subcommand>."""
import sys


def main():
    """Запуск команд проекта."""
    try:
        from crowdmap.cli import main as run
    except ImportError as exc:
        raise ImportError(
            "Couldn't import crowdmap dependencies. Are they installed and "
            "available on your PYTHONPATH environment variable? Did you "
            "forget to activate a virtual environment?"
        ) from exc
    sys.exit(run())


if __name__ == '__main__':
    main()
