"""``python -m obsearch bench|search|permtest|report --config <file> ...``"""
import os
import sys

COMMANDS = ('bench', 'search', 'permtest', 'report')


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'obsearch.settings')
    from django.core.management import execute_from_command_line

    if not argv or argv[0] not in COMMANDS:
        sys.stderr.write(f"usage: obsearch {{{'|'.join(COMMANDS)}}} --config <file> "
                         "[--seeds N] [--workers W] [--out DIR] [--force]\n")
        sys.exit(1)
    execute_from_command_line(['obsearch', *argv])


if __name__ == '__main__':
    main()
