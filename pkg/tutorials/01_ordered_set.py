"""Using the ordered set from several threads.

The set stores 64-bit integer keys.  add/remove/contains are lock-free and
range is wait-free, so a single instance can be shared freely.
"""

import threading

from versiontree import InvalidKeyError, OrderedSet

s = OrderedSet()
print(s.add(10), s.add(10))  # True False: the second add finds a duplicate
print(10 in s, s.remove(10), 10 in s)

# Each worker owns a stride of keys; scans run alongside them.
def worker(offset):
    for k in range(offset, 400, 4):
        s.add(k)
    for k in range(offset, 400, 8):
        s.remove(k)

threads = [threading.Thread(target=worker, args=(i,)) for i in range(4)]
for t in threads:
    t.start()
while any(t.is_alive() for t in threads):
    snapshot = s.range(0, 399)
    # A scan is atomic: what it returns was the exact content at one instant.
    assert snapshot == sorted(snapshot)
for t in threads:
    t.join()
print(len(s.range(0, 399)), "keys left")  # 200

# The two largest 64-bit values are reserved for the tree's sentinels.
try:
    s.add(2**63 - 1)
except InvalidKeyError as exc:
    print("rejected:", exc)
