from arraynav.cli import main
import sys

sys.exit(main())
