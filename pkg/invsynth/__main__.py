import sys

from invsynth.cli import main

sys.exit(main())
