import sys

from crcartan.cli import main

sys.exit(main())
