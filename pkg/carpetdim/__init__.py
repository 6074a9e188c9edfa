"""
carpetdim: dimensões de Hausdorff, caixa e empacotamento de carpetes de Barański.
"""
__version__ = "1.0.0"
