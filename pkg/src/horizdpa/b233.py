# NIST B-233 (sect233r1) domain parameters, FIPS 186-4, Appendix D.1.3.
#   E: y^2 + xy = x^3 + a x^2 + b over GF(2^233), f(t) = t^233 + t^74 + 1
# Elements are integers whose bit i is the coefficient of t^i.

M = 233
F_EXPONENTS = (233, 74, 0)
F_POLY = (1 << 233) | (1 << 74) | 1

A = 0x1
B = 0x066647EDE6C332C7F8C0923BB58213B333B20E9CE4281FE115F7D8F90AD

GX = 0x0FAC9DFCBAC8313BB2139F1BB755FEF65BC391F8B36F8F8EB7371FD558B
GY = 0x1006A08A41903350678E58528BEBF8A0BEFF867A7CA36716F7E01F81052

# prime order of G; cofactor 2
R = 0x1000000000000000000000000000013E974E72F8A6922031D2603CFE0D7
COFACTOR = 2
