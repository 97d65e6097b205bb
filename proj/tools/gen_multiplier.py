#!/usr/bin/env python3
"""Emit an unsigned NxN array multiplier (ripple-carry rows) as .bench."""
import sys

n = int(sys.argv[1]) if len(sys.argv) > 1 else 8
lines = []
count = 0


def gate(kind, *ins):
    global count
    count += 1
    name = f"g{count}"
    lines.append(f"{name} = {kind}({', '.join(ins)})")
    return name


def half_add(a, b):
    return gate("XOR", a, b), gate("AND", a, b)


def full_add(a, b, c):
    t = gate("XOR", a, b)
    s = gate("XOR", t, c)
    carry = gate("OR", gate("AND", a, b), gate("AND", t, c))
    return s, carry


a = [f"a{i}" for i in range(n)]
b = [f"b{i}" for i in range(n)]
pp = [[gate("AND", a[i], b[j]) for i in range(n)] for j in range(n)]

product = [pp[0][0]]
acc = pp[0][1:]  # running sum aligned at bit 1
for j in range(1, n):
    row = pp[j]
    nxt = []
    carry = None
    for i in range(n):
        x = acc[i] if i < len(acc) else None
        y = row[i]
        if x is None and carry is None:
            s = y
        elif x is None:
            s, carry = half_add(y, carry)
        elif carry is None:
            s, carry = half_add(x, y)
        else:
            s, carry = full_add(x, y, carry)
        nxt.append(s)
    nxt.append(carry)
    product.append(nxt[0])
    acc = nxt[1:]
product += acc

out = [f"# {n}x{n} unsigned array multiplier", f"# {2 * n} inputs, {2 * n} outputs, {count} gates", ""]
out += [f"INPUT({x})" for x in a + b]
out.append("")
for k, p in enumerate(product):
    out.append(f"OUTPUT(p{k})")
out.append("")
out += lines
for k, p in enumerate(product):
    out.append(f"p{k} = BUFF({p})")
print("\n".join(out))
