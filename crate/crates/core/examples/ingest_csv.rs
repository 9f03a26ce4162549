//! Parse an Agmarknet-style export, collapse duplicates, write the canonical
//! dataset and align it onto a daily calendar.
//!
//! cargo run --example ingest_csv

use mandi::ingest::{build_dataset, from_canonical_str, parse_csv, to_canonical_string, DedupPolicy, Schema};
use mandi::panel::{missing_fraction, DateRange};

const EXPORT: &str = "\
Sl no.,District Name,Market Name,Commodity,Variety,Grade,Min Price (Rs./Quintal),Max Price (Rs./Quintal),Modal Price (Rs./Quintal),Price Date,Arrivals (Tonnes)
1,Cuttack,Cuttack,Onion,Red,FAQ,1400,1600,1500,01/03/2015,12
2,Cuttack,Cuttack,Onion,Red,FAQ,1400,1650,1500,02/03/2015,9
3,Cuttack,Cuttack,Onion,Local,FAQ,1500,1700,1600,02/03/2015,3
4,Cuttack,Cuttack,Onion,Red,FAQ,1500,1700,1550,05/03/2015,10
5,Khurda,Bhubaneswar,Onion,Red,FAQ,1600,1800,1700,01/03/2015,20
6,Khurda,Bhubaneswar,Onion,Red,FAQ,1600,1800,1700,03/03/2015,18
7,Khurda,Bhubaneswar,Onion,Red,FAQ,1650,1850,1800,04/03/2015,
8,Khurda,Bhubaneswar,Onion,Red,FAQ,1650,1850,n/a,05/03/2015,15
9,Khurda,Bhubaneswar,Potato,Jyoti,FAQ,700,800,750,01/03/2015,40
";

fn main() -> mandi::Result<()> {
    let (records, issues) = parse_csv(EXPORT.as_bytes(), &Schema::agmarknet())?;
    println!("{} records parsed", records.len());
    for issue in &issues {
        println!("  skipped {issue}");
    }

    // two Cuttack rows on 2 March collapse to an arrivals-weighted mean
    let ds = build_dataset(&records, "onion", DedupPolicy::ArrivalsWeightedMean)?;
    let text = to_canonical_string(&ds)?;
    println!("\n{text}");
    assert_eq!(from_canonical_str(&text)?, ds);

    let panel = ds.to_panel(None)?;
    let span = panel.calendar();
    println!("calendar {} ..= {} ({} days)", span.start, span.end, panel.n_days());
    for (m, id) in panel.markets().iter().enumerate() {
        let row: Vec<String> = panel
            .direction_row(m)
            .iter()
            .map(|d| d.map_or("-".to_string(), |d| d.to_string()))
            .collect();
        let range = DateRange::new(span.start, span.end)?;
        println!(
            "{id:<12} missing {:.2}  directions {}",
            missing_fraction(&panel, id, range)?,
            row.join(" ")
        );
    }
    Ok(())
}
