//! Writes a constructed grid as a binary dump with its sidecar, reads it
//! back, and converts it to CSV and OBJ.

use helix_surfaces::construct::{construct, ConstructConfig};
use helix_surfaces::io::{to_json_string, write_obj, GridDump, COORD_LABELS_GRID};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cons = construct(&ConstructConfig::default().with_step(2e-3))?;
    let dir = std::env::temp_dir().join("helix4_export_example");
    std::fs::create_dir_all(&dir)?;
    let bin = dir.join("grid.bin");
    GridDump::from_construction(&cons).write(&bin)?;
    let dump = GridDump::read(&GridDump::sidecar_path(&bin))?;
    println!("{}", to_json_string(&dump.header)?);

    let csv = dump.to_csv()?;
    std::fs::write(dir.join("grid.csv"), &csv)?;
    let obj = write_obj(
        dump.header.nx,
        dump.header.ny,
        &dump.points(),
        [0, 1, 3],
        COORD_LABELS_GRID,
    )?;
    std::fs::write(dir.join("grid.obj"), &obj)?;
    println!(
        "{} csv rows, {} obj faces in {}",
        csv.lines().count() - 1,
        obj.lines().filter(|l| l.starts_with("f ")).count(),
        dir.display()
    );
    Ok(())
}
