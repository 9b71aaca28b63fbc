#ifndef PAM_PAM_HPP
#define PAM_PAM_HPP

#include <pam/error.hpp>
#include <pam/greens.hpp>
#include <pam/io.hpp>
#include <pam/lanczos.hpp>
#include <pam/lattice.hpp>
#include <pam/montecarlo.hpp>
#include <pam/phase.hpp>
#include <pam/rng.hpp>
#include <pam/special.hpp>
#include <pam/spectral.hpp>

#endif  // PAM_PAM_HPP
