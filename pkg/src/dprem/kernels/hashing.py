"""Constants of the counter-based generator shared by both backends.

Every random draw is a pure function of its coordinates. A field value is
derived from the 64-bit word sequence

    seed, sample_index, n, d, x_1, ..., x_d, stream

(each coordinate a two's-complement int64 reinterpreted as uint64). The state
starts as ``mix(seed ^ C_FIELD)`` and absorbs each later word ``w`` via
``h = mix((h ^ w) + GOLDEN)``, where ``mix`` is the splitmix64 finalizer.
Walk steps use the words ``seed, sample_index, m, STREAM_WALK`` under the
domain constant ``C_WALK``. A uniform on (0, 1) is ``((h >> 11) + 0.5) / 2**53``.
"""

GOLDEN = 0x9E3779B97F4A7C15
M1 = 0xBF58476D1CE4E5B9
M2 = 0x94D049BB133111EB

C_FIELD = 0x243F6A8885A308D3
C_WALK = 0x13198A2E03707344

STREAM_MAIN = 0
STREAM_AUX = 1
STREAM_WALK = 2

DIST_CODES = {"gaussian": 0, "uniform": 1, "cexp": 2}
