import math

default_hash_bits = 32
# two-bit substrings
default_substrings = 16
default_bitmaps = 256
# four-bit substrings; the cost bound, collision and permutation-oracle checks use this shape
reference_substrings = 8

# FM asymptotics, reported next to the fitted constant.
fm_phi = 0.77351
fm_sigma_inf = 1.12127
calibration_reference_cardinality = 10 ** 4


def analytic_calibration(cardinality=calibration_reference_cardinality):
    expected_rank = math.log2(fm_phi * cardinality)
    return (1.0 / fm_phi) * 2 ** (fm_sigma_inf ** 2 / expected_rank)


# Fitted against the exact counter: median C * 2**H / true = 1 over
# calibration_cardinalities x calibration_trials (`elda calibrate`).
default_calibration = 1.401

calibration_cardinalities = (10 ** 2, 10 ** 3, 10 ** 4, 10 ** 5)
calibration_trials = 50
heldout_cardinality = 5 * 10 ** 4

# Above this many patterns a single insert walks the shared-prefix pattern trie.
trie_pattern_threshold = 32
insert_chunk_size = 2048
# balanced pattern draws that may repeat an existing row before falling back to uniform
balanced_draw_attempts = 16

sketch_record_format = 'elda-sketch'
sketch_record_version = 1

frequency_deviation_multiplier = 3.0
frequency_capacity = 10000
frequency_min_history = 2
frequency_min_count = 5
# digest(64) + current count(32) + mean(64) + variance(64) + epochs(32) + last seen(32)
frequency_record_bits = 288
