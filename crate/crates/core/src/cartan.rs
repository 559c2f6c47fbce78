//! Root data for type A: the Cartan matrix, symmetrized inner products with
//! long-root normalization (alpha_i, alpha_i) = 2, the rho-pairings entering
//! connection transformation laws, and the dual Coxeter number.

use num::bigint::BigInt;
use num::rational::BigRational;

#[derive(Clone, Debug)]
pub struct CartanData {
    rank: usize,
    cartan: Vec<Vec<i64>>,
    inner: Vec<Vec<BigRational>>,
    rho_pairings: Vec<BigRational>,
    dual_coxeter: i64,
}

impl CartanData {
    /// Type A_l data (sl_{l+1}).
    pub fn type_a(rank: usize) -> Self {
        assert!(rank >= 1);
        let mut cartan = vec![vec![0i64; rank]; rank];
        for i in 0..rank {
            cartan[i][i] = 2;
            if i + 1 < rank {
                cartan[i][i + 1] = -1;
                cartan[i + 1][i] = -1;
            }
        }
        // Simply laced with (alpha_i, alpha_i) = 2: the symmetrized inner
        // product equals the Cartan matrix.
        let inner = cartan
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&e| BigRational::from_integer(BigInt::from(e)))
                    .collect()
            })
            .collect();
        // <alpha_i, rho^vee> = 1 for every simple root.
        let rho_pairings = vec![BigRational::from_integer(BigInt::from(1)); rank];
        CartanData {
            rank,
            cartan,
            inner,
            rho_pairings,
            dual_coxeter: rank as i64 + 1,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn cartan_matrix(&self) -> &[Vec<i64>] {
        &self.cartan
    }

    /// nu_0^{-1}(alpha_i, alpha_j).
    pub fn inner_product(&self, i: usize, j: usize) -> &BigRational {
        &self.inner[i][j]
    }

    pub fn rho_pairing(&self, i: usize) -> &BigRational {
        &self.rho_pairings[i]
    }

    pub fn dual_coxeter(&self) -> i64 {
        self.dual_coxeter
    }

    /// The critical inner product kappa_c = -(1/2) Tr ad x ad y evaluated on
    /// the sl_2 basis pairs (e,f) and (h,h); equals -h_dual times the basic
    /// form with kappa_0(e,f) = 1, kappa_0(h,h) = 2.
    pub fn critical_ef(&self) -> BigRational {
        BigRational::from_integer(BigInt::from(-self.dual_coxeter))
    }

    pub fn critical_hh(&self) -> BigRational {
        BigRational::from_integer(BigInt::from(-2 * self.dual_coxeter))
    }
}
