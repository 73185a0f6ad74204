"""Walk the architecture family: traces, per-layer shapes, parameter budgets."""

from dsod import make_spec, shape_trace, count_params, trace_csv

# the flagship configuration: stem entry, growth 48, bottleneck width 192,
# four dense blocks of 6/8/8/8 layers, six prediction scales at 300px input
spec = make_spec("DS/64-192-48-1", block_layers=(6, 8, 8, 8), input_size=300,
                 prediction_style="dense", num_classes=21)

print("layer trace for", spec.arch_string)
print(f"{'name':28s} {'ch':>5s} {'h':>4s} {'w':>4s} {'params':>10s}")
for row in shape_trace(spec):
    print(f"{row.name:28s} {row.channels:>5d} {row.h:>4d} {row.w:>4d} {row.params:>10d}")
print("total parameters:", count_params(spec))

# the same backbone with the plain prediction front-end costs more: each
# extra scale carries full-width learned features instead of reusing half
plain = make_spec("DS/64-192-48-1", block_layers=(6, 8, 8, 8), input_size=300,
                  prediction_style="plain", num_classes=21)
print("\nplain front-end total:", count_params(plain))
print("dense front-end total:", count_params(spec))

# smaller family members scale down along growth rate and bottleneck width
for arch, blocks in [("DS/32-12-16-0.5", (4, 6, 6, 6)),
                     ("DS/64-16-16-1", (6, 8, 8, 8)),
                     ("DS/64-64-16-1", (6, 8, 8, 8))]:
    s = make_spec(arch, block_layers=blocks, input_size=300,
                  prediction_style="dense", num_classes=21)
    print(f"{arch:20s} blocks {blocks}: {count_params(s):>12,d} params")

# the csv form is what the command line prints
print("\nfirst lines of the machine-readable trace:")
print("\n".join(trace_csv(spec).splitlines()[:5]))
