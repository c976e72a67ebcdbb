#pragma once

// libtorch's logging header defines CHECK; load it first and hand the name back to doctest.
#include <torch/torch.h>

#undef CHECK
#include <doctest.h>
