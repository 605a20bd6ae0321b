import sys

from conjlab.cli import main

sys.exit(main())
