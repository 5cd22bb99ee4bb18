"""Phases and version trees.

Every range scan opens a new phase.  Updates never overwrite nodes in place;
they link new nodes whose ``prev`` pointers lead back to what they replaced.
Following those pointers from the root gives the tree as it stood in any
earlier phase, which is how a scan sees a consistent snapshot while updates
keep going.
"""

from versiontree import OrderedSet

s = OrderedSet()
for k in (5, 1, 8):
    s.add(k)
print("phase", s.phase)  # 0

print(s.range(0, 10))  # [1, 5, 8], and the phase moves to 1
s.remove(5)
s.add(3)
print("phase", s.phase)  # 1

for i in range(s.phase + 1):
    vt = s.version_tree(i)
    print(f"T_{i}: keys {vt.keys()}, {len(vt.nodes)} nodes, BST problems: {vt.check_bst()}")
# T_0 still holds 5 and lacks 3; T_1 reflects both updates.
