def solve(data):
    return chain_entry0(data)
