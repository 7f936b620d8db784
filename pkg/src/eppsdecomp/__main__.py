import sys

from eppsdecomp.cli import main

sys.exit(main())
