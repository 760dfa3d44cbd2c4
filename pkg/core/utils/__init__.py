# Utils module

