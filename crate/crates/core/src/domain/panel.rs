use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::Transaction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Apartment {
    /// Adjusted log price per square meter.
    pub y: f64,
    /// Sale day (days since 1997-01-01).
    pub day: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Building {
    pub id: String,
    pub parcel_id: String,
    pub height: u32,
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub apartments: Vec<Apartment>,
}

impl Building {
    pub fn len(&self) -> usize {
        self.apartments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.apartments.is_empty()
    }

    pub fn mean_y(&self) -> f64 {
        self.apartments.iter().map(|a| a.y).sum::<f64>() / self.apartments.len() as f64
    }

    /// Mean sale day, used as the building's transaction period.
    pub fn period(&self) -> f64 {
        self.apartments.iter().map(|a| a.day).sum::<f64>() / self.apartments.len() as f64
    }

    pub fn coordinates(&self) -> Option<(f64, f64)> {
        self.x.zip(self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bloc {
    pub id: String,
    pub buildings: Vec<Building>,
}

impl Bloc {
    pub fn apartment_count(&self) -> usize {
        self.buildings.iter().map(Building::len).sum()
    }
}

/// All blocs with at least one building of a given height.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeightPanel {
    pub height: u32,
    pub blocs: Vec<Bloc>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanelCounts {
    pub blocs: usize,
    pub buildings: usize,
    pub apartments: usize,
}

impl HeightPanel {
    pub fn counts(&self) -> PanelCounts {
        PanelCounts {
            blocs: self.blocs.len(),
            buildings: self.blocs.iter().map(|b| b.buildings.len()).sum(),
            apartments: self.blocs.iter().map(Bloc::apartment_count).sum(),
        }
    }

    pub fn buildings(&self) -> impl Iterator<Item = &Building> {
        self.blocs.iter().flat_map(|b| b.buildings.iter())
    }

    pub fn apartments(&self) -> impl Iterator<Item = &Apartment> {
        self.buildings().flat_map(|b| b.apartments.iter())
    }

    /// Apply `f` to every apartment price in place.
    pub fn map_prices(&mut self, mut f: impl FnMut(&Apartment) -> f64) {
        for bloc in &mut self.blocs {
            for building in &mut bloc.buildings {
                for apt in &mut building.apartments {
                    apt.y = f(apt);
                }
            }
        }
    }
}

/// Bloc → building → apartment hierarchy, one layer per building height.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    heights: Vec<HeightPanel>,
}

impl Panel {
    /// Heights are sorted; empty layers are dropped.
    pub fn new(mut heights: Vec<HeightPanel>) -> Self {
        heights.retain(|h| !h.blocs.is_empty());
        heights.sort_by_key(|h| h.height);
        Self { heights }
    }

    pub fn heights(&self) -> &[HeightPanel] {
        &self.heights
    }

    pub fn heights_mut(&mut self) -> &mut [HeightPanel] {
        &mut self.heights
    }

    pub fn at(&self, height: u32) -> Option<&HeightPanel> {
        self.heights
            .binary_search_by_key(&height, |h| h.height)
            .ok()
            .map(|i| &self.heights[i])
    }

    pub fn max_height(&self) -> u32 {
        self.heights.last().map_or(0, |h| h.height)
    }

    pub fn counts(&self) -> BTreeMap<u32, PanelCounts> {
        self.heights.iter().map(|h| (h.height, h.counts())).collect()
    }

    pub fn apartment_count(&self) -> usize {
        self.heights.iter().map(|h| h.counts().apartments).sum()
    }

    pub fn buildings(&self) -> impl Iterator<Item = &Building> {
        self.heights.iter().flat_map(HeightPanel::buildings)
    }

    pub fn map_prices(&mut self, mut f: impl FnMut(u32, &Apartment) -> f64) {
        for hp in &mut self.heights {
            let h = hp.height;
            hp.map_prices(|a| f(h, a));
        }
    }
}

/// Panel plus what was left out of it.
#[derive(Debug, Clone, Default)]
pub struct PanelBuild {
    pub panel: Panel,
    /// Parcels carrying more than one building.
    pub multi_building_parcels: usize,
    pub multi_building_transactions: usize,
    /// Buildings left with a single sale.
    pub singleton_transactions: usize,
    /// Rows with neither adjusted nor deflated price.
    pub unpriced_transactions: usize,
}

/// Group priced transactions into the frontier panel.
///
/// Uses the adjusted log price, falling back to the deflated log price.
/// Parcels with more than one building are left out (they still serve the
/// hedonic fit), as are buildings with fewer than two sales.
pub fn build_panel(txs: &[Transaction]) -> PanelBuild {
    let mut out = PanelBuild::default();

    let mut per_parcel: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    for t in txs {
        per_parcel.entry(&t.parcel_id).or_default().insert(t.building_key());
    }
    let multi: BTreeSet<&str> = per_parcel
        .iter()
        .filter(|(_, b)| b.len() > 1)
        .map(|(p, _)| *p)
        .collect();
    out.multi_building_parcels = multi.len();

    type Key = (u32, String, String);
    let mut grouped: BTreeMap<Key, Vec<&Transaction>> = BTreeMap::new();
    for t in txs {
        if multi.contains(t.parcel_id.as_str()) {
            out.multi_building_transactions += 1;
            continue;
        }
        if t.adjusted_log_price.or(t.log_price).is_none() {
            out.unpriced_transactions += 1;
            continue;
        }
        grouped
            .entry((t.height, t.bloc_id.clone(), t.building_key()))
            .or_default()
            .push(t);
    }

    let mut layers: BTreeMap<u32, BTreeMap<String, Vec<Building>>> = BTreeMap::new();
    for ((height, bloc, key), rows) in grouped {
        if rows.len() < 2 {
            out.singleton_transactions += rows.len();
            continue;
        }
        let coords: Vec<(f64, f64)> = rows.iter().filter_map(|t| t.coordinates()).collect();
        let (x, y) = if coords.is_empty() {
            (None, None)
        } else {
            let n = coords.len() as f64;
            (
                Some(coords.iter().map(|c| c.0).sum::<f64>() / n),
                Some(coords.iter().map(|c| c.1).sum::<f64>() / n),
            )
        };
        let apartments = rows
            .iter()
            .map(|t| Apartment {
                y: t.adjusted_log_price.or(t.log_price).expect("priced row"),
                day: t.day(),
            })
            .collect();
        layers.entry(height).or_default().entry(bloc).or_default().push(Building {
            id: key,
            parcel_id: rows[0].parcel_id.clone(),
            height,
            x,
            y,
            apartments,
        });
    }

    out.panel = Panel::new(
        layers
            .into_iter()
            .map(|(height, blocs)| HeightPanel {
                height,
                blocs: blocs
                    .into_iter()
                    .map(|(id, buildings)| Bloc { id, buildings })
                    .collect(),
            })
            .collect(),
    );
    out
}
