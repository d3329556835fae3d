import sys

from genfl.main import main

sys.exit(main())
