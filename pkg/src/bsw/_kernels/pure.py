"""Pure-Python word kernels.

Letters are nonzero ints: generator ``i`` (0-based) is ``i+1``, its inverse
``-(i+1)``.  A word is freely reduced when no two adjacent letters cancel.
"""


def reduce_ints(seq):
    """Freely reduce a letter sequence, returning a list."""
    out = []
    push = out.append
    pop = out.pop
    for x in seq:
        if out and out[-1] == -x:
            pop()
        else:
            push(x)
    return out


def concat_reduced(a, b):
    """Concatenate two freely reduced sequences, cancelling at the seam."""
    i = len(a)
    j = 0
    nb = len(b)
    while i > 0 and j < nb and a[i - 1] == -b[j]:
        i -= 1
        j += 1
    return list(a[:i]) + list(b[j:nb])


def common_prefix_len(a, b, limit):
    """Length of the common prefix of a and b, scanning at most `limit`."""
    n = min(len(a), len(b), limit)
    k = 0
    while k < n and a[k] == b[k]:
        k += 1
    return k
