#include <doctest.h>

TEST_SUITE("translated") {}
