import sys

from privkick.cli import main

sys.exit(main())
