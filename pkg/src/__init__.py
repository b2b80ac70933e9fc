# Nehari fixed-point toolkit - Main Package
