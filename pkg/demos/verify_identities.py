"""Tour of the three verification channels.

An identity can be confirmed (1) exactly, when substituting the closed
form reduces it to zero by rational arithmetic alone; (2) numerically at
high precision, when the identity is transcendental but vanishes below
2^-100 at hundreds of bits of precision; or (3) statistically, by
property testing fresh black-box samples against the error bound.  A
false identity fails with a concrete witness point.
"""

from rsrforge import VerifyConfig, property_from_identity, property_test, symbolic_verify
from rsrforge.parser import parse
from rsrforge.sampling import oracle_from_expr

cfg = VerifyConfig()

print("1. Exact rational channel")
out = symbolic_verify("Eq(f(x) + f(y) - f(x+y), 0)", parse("c*x"), cfg)
print(f"   additivity of f(t) = c*t: {out.status} via {out.channel}")
out = symbolic_verify("f(x*r) - f(x)*f(r)", parse("1/x^2"), cfg)
print(f"   multiplicativity of 1/t^2: {out.status} via {out.channel}")

print("\n2. High-precision randomized channel")
out = symbolic_verify(
    "f(x*r) - f(x) - f(r)", parse("log(x)"), cfg, box=(0.001, 10), seed=1
)
print(f"   log(x*r) = log x + log r: {out.status} via {out.channel}, "
      f"max residual {out.max_abs_residual:.2e}")
out = symbolic_verify("f(x+r) - f(x)*f(r)", parse("exp(x)"), cfg, box=(-3, 3), seed=1)
print(f"   exp(x+r) = exp(x) exp(r): {out.status} via {out.channel}")

print("\n3. A false identity fails with a witness")
out = symbolic_verify("f(x+y) - f(x) - f(y)", parse("sin(x)"), cfg, seed=1)
print(f"   'sin is additive': {out.status}")
print(f"   {out.reason}")

print("\n4. Statistical property testing against a black box")
identity = property_from_identity(
    parse("2*f(x)*f(x+r)*f(r) - f(x)*f(x+r) - f(x)*f(r) - f(x+r)*f(r) + f(x+r)")
)
sigmoid = oracle_from_expr("sigmoid", parse("1/(1+exp(-x))"), 1)
out = property_test(identity, sigmoid, cfg, seed=2)
print(f"   sigmoid self-reduction on 1000 fresh samples: {out.status}, "
      f"mean residual {out.mean_abs_residual:.2e}")

wrong_oracle = oracle_from_expr("tanh", parse("tanh(x)"), 1)
out = property_test(identity, wrong_oracle, cfg, seed=2)
print(f"   the same identity against tanh: {out.status}")
