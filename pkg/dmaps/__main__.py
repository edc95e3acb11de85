import sys

from dmaps.main import main

sys.exit(main())
