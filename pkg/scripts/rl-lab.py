#!/usr/bin/env python3
from rigidity_lab.runner import main

if __name__ == '__main__':
    main()
