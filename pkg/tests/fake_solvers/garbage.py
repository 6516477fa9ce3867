import sys

sys.stdout.write("Segmentation fault? no.\n\x00\x01 status: fine, probably\n")
