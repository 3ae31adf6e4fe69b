import sys

from ergodec.cli import main

sys.exit(main())
