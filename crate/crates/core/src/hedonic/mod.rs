//! Floor and height premia, adjusted prices and the housing quantity q(h).

mod model;
mod quantity;

pub(crate) use model::{restricted_row, RESTRICTED_TERMS};
pub use model::{adjust_prices, fit_hedonic, HedonicModel, HedonicSpec, PremiumCell, Term};
pub use quantity::{quantity_table, QuantityTable};
