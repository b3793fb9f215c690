import sys

from sagnac.main import main

sys.exit(main())
