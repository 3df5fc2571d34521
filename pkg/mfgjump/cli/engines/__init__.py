# Engine suites used by the commands
