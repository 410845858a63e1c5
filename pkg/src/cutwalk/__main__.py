from cutwalk.expcli.cli import main

raise SystemExit(main())
