import sys

from chromofluid.cli import main

sys.exit(main())
