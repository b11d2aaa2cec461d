import math

def solve(items):
    order = rank_jobs(jobs)
    return items
