from lcmix.main import main

main()
