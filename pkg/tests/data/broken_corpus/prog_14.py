def solve(data):
    state = lower_bound(data)
    state = upper_bound(state)
    return state
