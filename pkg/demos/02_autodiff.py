"""The tensor core: forward ops, reverse-mode gradients, finite-difference checks."""

import numpy as np

from dsod import tensor as T
from dsod import gradcheck

# tensors wrap float32 numpy arrays; requires_grad opts into the tape
x = T.Tensor(np.linspace(-2, 2, 12, dtype=np.float32).reshape(1, 3, 2, 2),
             requires_grad=True)
y = T.relu(x)
loss = T.tsum(T.scale(y, 0.5))
loss.backward()
print("relu grad (0 where the input was negative):")
print(x.grad.reshape(3, 4))

# a small convolution: 2 input channels, 3 filters, stride 1
rng = np.random.default_rng(0)
img = T.Tensor(rng.standard_normal((1, 2, 5, 5)).astype(np.float32), requires_grad=True)
w = T.Tensor(rng.standard_normal((3, 2, 3, 3)).astype(np.float32) * 0.1, requires_grad=True)
b = T.Tensor(np.zeros(3, np.float32), requires_grad=True)
out = T.conv2d(img, w, b, stride=1, padding=1)
print("\nconv output shape:", out.data.shape)
T.tsum(out).backward()
print("bias grad equals output positions per filter:", b.grad)

# ceil-mode pooling keeps the tail window even when it hangs off the edge
p = T.maxpool2d(T.Tensor(rng.standard_normal((1, 1, 5, 5)).astype(np.float32)),
                kernel=2, stride=2)
print("\npool 5x5 by 2 (ceil): ->", p.data.shape)

# the gradcheck harness compares every backward pass against central
# differences in float64; anything above 1e-4 relative is a failure
for op in ("conv2d_s1", "maxpool2d_s2", "batchnorm_train", "softmax_cross_entropy"):
    r = gradcheck.check_op(op, seed=0)
    print(f"{op:24s} max rel err {r.max_rel_err:.2e}")

# no_grad suspends taping, the usual inference-time switch
with T.no_grad():
    silent = T.conv2d(img, w, b, stride=1, padding=1)
print("\ninside no_grad nothing records a parent:", silent._parents == ())
