import sys

from refundmech.cli import main

sys.exit(main())
