"""Shared test oracles: finite differences and brute-force rescoring."""

import numpy as np


def numeric_gradient(f, tensor, eps=1e-6):
    """Central-difference gradient of scalar f() w.r.t. tensor.data.

    f must rebuild its computation from the live tensor on every call.
    """
    flat = tensor.data.reshape(-1)
    grad = np.zeros_like(flat)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        f_plus = float(f().item())
        flat[i] = orig - eps
        f_minus = float(f().item())
        flat[i] = orig
        grad[i] = (f_plus - f_minus) / (2.0 * eps)
    return grad.reshape(tensor.data.shape)


def max_rel_err(analytic, numeric, floor=1e-5):
    a = np.asarray(analytic, dtype=np.float64).reshape(-1)
    n = np.asarray(numeric, dtype=np.float64).reshape(-1)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / denom)) if a.size else 0.0


def assert_grads_close(f, tensors, tol=1e-6, eps=1e-6):
    """Backward of f() against central differences for each tensor."""
    for t in tensors:
        t.zero_grad()
    loss = f()
    loss.backward()
    for t in tensors:
        analytic = np.zeros_like(t.data) if t.grad is None else t.grad.copy()
        t.zero_grad()
        numeric = numeric_gradient(f, t, eps=eps)
        err = max_rel_err(analytic, numeric)
        assert err < tol, f"gradient mismatch (rel err {err:.3e} >= {tol})"
