from swarm_sacrifice.main import main

raise SystemExit(main())
