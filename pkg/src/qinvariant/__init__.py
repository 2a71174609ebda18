"""q-invariant functions of Ornstein-Uhlenbeck images of self-similar semigroups."""
