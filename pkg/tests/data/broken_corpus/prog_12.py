def solve(data):
    state = init_state(data)
    state = improve_state(state)
    return state
