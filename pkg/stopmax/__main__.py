from stopmax.cli import main

main()
