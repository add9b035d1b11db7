"""Pure-Python metric kernels; the reference for the compiled extension.

Both implementations must stay bit-identical: same operations, same order,
same libm calls. Anything that could diverge (weight formulas other than the
temporal power, distance computations) is computed upstream in shared code
and passed in as a ready-made weight column.
"""


def temporal_label_sums(ts, out, final, is_auto, label, include_auto, gamma, now_t):
    """Masked fading sums over the event columns with weight gamma**age.

    Returns (correct_weight_for_label, total_weight_for_label, total_weight),
    skipping events where the agent proposed nothing and, unless
    ``include_auto``, events that were machine auto-accepts.
    """
    num = 0.0
    den_label = 0.0
    den_all = 0.0
    for i in range(len(ts)):
        o = out[i]
        if o < 0:
            continue
        if is_auto[i] and not include_auto:
            continue
        w = gamma ** (now_t - ts[i])
        den_all += w
        if o == label:
            den_label += w
            if o == final[i]:
                num += w
    return num, den_label, den_all


def weighted_label_sums(weights, out, final, is_auto, label, include_auto):
    """Same masking as ``temporal_label_sums`` with precomputed weights."""
    num = 0.0
    den_label = 0.0
    den_all = 0.0
    for i in range(len(weights)):
        o = out[i]
        if o < 0:
            continue
        if is_auto[i] and not include_auto:
            continue
        w = weights[i]
        den_all += w
        if o == label:
            den_label += w
            if o == final[i]:
                num += w
    return num, den_label, den_all
