import sys

from mongelab.cli import main

sys.exit(main())
