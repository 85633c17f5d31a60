#include <doctest.h>

TEST_SUITE("capacity") {}
