"""Matrix helpers."""


def transpose(matrix): 
    """Transpose a matrix.""" 
    rows = len(matrix) 
    cols = len(matrix[0]) 
    return [[matrix[r][c] for r in range(rows)] for c in range(cols)] 
