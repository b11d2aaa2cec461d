def solve(data):
    state = parse_input(data)
    state = emit_output(state)
    return state
