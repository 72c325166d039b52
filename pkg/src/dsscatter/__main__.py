import sys

from dsscatter.cli import main

sys.exit(main())
