import sys

from liras.cli import main


sys.exit(main())
