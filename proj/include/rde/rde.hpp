#pragma once

// Robust density estimation for detecting adversarial inputs from classifier
// feature vectors: kernel PCA, then a per-class Minimum Covariance Determinant
// Gaussian; inputs with low class-conditional likelihood are flagged.

#include "rde/detector.hpp"
#include "rde/error.hpp"
#include "rde/gaussian.hpp"
#include "rde/io.hpp"
#include "rde/kpca.hpp"
#include "rde/mcd.hpp"
#include "rde/metrics.hpp"
#include "rde/parallel.hpp"
#include "rde/random.hpp"
#include "rde/scenario.hpp"
