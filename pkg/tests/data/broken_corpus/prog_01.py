import math

def solve(items):
    move = pick_best_move(state, moves)
    return items
