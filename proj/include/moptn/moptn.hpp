#pragma once

#include "causal.hpp"
#include "entropy.hpp"
#include "eval.hpp"
#include "ordinal.hpp"
#include "simulate.hpp"
