import sys

from eplidar.cli import main

sys.exit(main())
