from gmla.cli import main

main()
